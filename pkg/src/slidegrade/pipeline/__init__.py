from .progress import ProgressHub
from .service import JOB_STATUSES, Pipeline, new_job_id

__all__ = ["ProgressHub", "JOB_STATUSES", "Pipeline", "new_job_id"]
