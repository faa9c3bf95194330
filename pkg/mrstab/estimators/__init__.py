from mrstab.estimators.base_estimator import *
from mrstab.estimators.recurrence import *
from mrstab.estimators.stability import *
from mrstab.estimators.contraction import *
