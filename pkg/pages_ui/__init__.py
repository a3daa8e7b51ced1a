from . import variants_page
from . import pca_page
from . import ensemble_page
from . import planner_page
