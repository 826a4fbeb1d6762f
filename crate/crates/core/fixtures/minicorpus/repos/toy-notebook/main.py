import sklearn
import pandas
