import torch
from transformers import AutoTokenizer, AutoModelForSequenceClassification

from . import util
