from .server import AdapterConfig, create_app

__version__ = "0.1.0"
__all__ = ["AdapterConfig", "create_app"]
