import json, os
import requests
import pandas as pd
