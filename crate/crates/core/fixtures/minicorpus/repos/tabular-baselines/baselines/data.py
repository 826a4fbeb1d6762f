from pathlib import Path
import pandas as pd


def load(path):
    return pd.read_csv(Path(path))
