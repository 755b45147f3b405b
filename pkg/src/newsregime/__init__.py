"""Regime-aware training-window selection for news-topic-driven stock forecasting."""
from importlib.resources import files

__version__ = "0.1.0"


def fixture_dir():
    """Directory holding the bundled synthetic fixture set and its config.yaml."""
    return files(__name__) / "fixtures"
