"""Robust fits.

import prophet  # not used, kept in the docstring
"""
import statsmodels.api as sm
from sklearn.linear_model import HuberRegressor
import numpy as np
