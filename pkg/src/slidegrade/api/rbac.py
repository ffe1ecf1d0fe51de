"""Role-based access control: the documented permission matrix.

Deny-by-default over (role, endpoint family). A user passes when any of
their roles is allowed. Resource-level ownership (students see only their
own jobs, teachers only their own courses) is enforced inside handlers on
top of this matrix; the matrix answers "may this role ever touch this
endpoint group at all".

The RBAC acceptance sweep asserts the live API matches this table cell
for cell, so it is the single source of truth.
"""

from __future__ import annotations

ROLES = ("anonymous", "student", "teacher", "admin")

FAMILIES = (
    "auth_login",
    "auth_logout",
    "courses_read",
    "submissions_create",
    "submissions_read",
    "rubrics_manage",
    "analytics_read",
    "admin_import",
    "events_ingest",
)

PERMISSION_MATRIX: dict[str, frozenset[str]] = {
    "auth_login": frozenset({"anonymous", "student", "teacher", "admin"}),
    "auth_logout": frozenset({"student", "teacher", "admin"}),
    # own-enrollment course/rubric listing; feeds the upload form
    "courses_read": frozenset({"student", "teacher", "admin"}),
    "submissions_create": frozenset({"student"}),
    "submissions_read": frozenset({"student", "teacher", "admin"}),
    "rubrics_manage": frozenset({"teacher", "admin"}),
    "analytics_read": frozenset({"teacher", "admin"}),
    "admin_import": frozenset({"admin"}),
    "events_ingest": frozenset({"student", "teacher", "admin"}),
}


def allowed(family: str, roles: set[str] | frozenset[str]) -> bool:
    """Deny-by-default matrix lookup; any allowed role suffices."""
    permitted = PERMISSION_MATRIX.get(family, frozenset())
    if not roles:
        return "anonymous" in permitted
    return bool(permitted & set(roles))
