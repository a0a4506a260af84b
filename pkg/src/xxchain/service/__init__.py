from .app import app, create_app, execute
from .models import ErrorResponse, RunRequest, SubcommandInfo, TableResponse

__all__ = [
    "app",
    "create_app",
    "execute",
    "RunRequest",
    "TableResponse",
    "SubcommandInfo",
    "ErrorResponse",
]
