import re
import logging
