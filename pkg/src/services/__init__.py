from .aggregation_service import aggregation_service
from .estimation_service import estimation_service
from .experiment_service import experiment_service
from .ingestion_service import ingestion_service

__all__ = ["ingestion_service", "estimation_service", "aggregation_service", "experiment_service"]
