import argparse
import numpy as np
from tagger.models import nn
