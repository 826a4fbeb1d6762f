import xgboost as xgb
import pandas as pd
from sklearn.model_selection import train_test_split
