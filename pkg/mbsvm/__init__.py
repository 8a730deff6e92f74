"""Mini-batch primal and dual stochastic solvers for the linear SVM."""

__version__ = "0.4.1"
