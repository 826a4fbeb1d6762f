import statsmodels.tsa.api as tsa
import pandas as pd
import numpy as np
import collections
