import time
import argparse
import torch
import numpy
