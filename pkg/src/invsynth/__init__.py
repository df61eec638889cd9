"""Loop invariant synthesis from sparse CNF classifiers learned by integer programming."""

__version__ = "0.1.0"
