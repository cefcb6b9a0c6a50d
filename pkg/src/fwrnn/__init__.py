"""Frank-Wolfe training of recurrent networks, with baselines, benchmarks and probes."""

__version__ = "0.1.0"
