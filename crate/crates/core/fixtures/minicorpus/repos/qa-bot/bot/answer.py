from transformers import pipeline
import requests
from typing import List
