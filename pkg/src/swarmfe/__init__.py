"""Feature engineering for tabular intrusion data: bee-colony feature
selection, GP feature construction, KNN evaluation."""

from .knn import BACKEND as knn_backend

__version__ = "0.1.0"
__all__ = ["knn_backend", "__version__"]
