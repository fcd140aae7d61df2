"""Quasineutral Vlasov-Poisson with uncertain initial data: solvers, norms and studies."""
__version__ = "0.1.0"
