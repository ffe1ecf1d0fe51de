from .app import create_app
from .rbac import FAMILIES, PERMISSION_MATRIX, ROLES, allowed
from .services import Services, create_services

__all__ = ["create_app", "FAMILIES", "PERMISSION_MATRIX", "ROLES", "allowed",
           "Services", "create_services"]
