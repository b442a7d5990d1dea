import json
import logging
import os
import sys
from datetime import datetime

from dotenv import load_dotenv

load_dotenv(override=False)


class JSONFormatter(logging.Formatter):
    def format(self, record):
        log_data = {
            'timestamp': datetime.now().strftime('%Y-%m-%d %H:%M:%S.%f')[:-3],
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'line': record.lineno
        }
        if hasattr(record, 'extra_data'):
            log_data['extra'] = record.extra_data
        return json.dumps(log_data, default=str)


def logger(name='coneoff', level=None):
    """Return a logger writing one JSON object per line to stderr.

    Reports own stdout, so logs never interleave with them. The level comes
    from LOG_LEVEL (default WARNING) unless given explicitly.
    """
    if level is None:
        level = os.getenv("LOG_LEVEL", "WARNING").upper()
    logger = logging.getLogger(name)
    logger.setLevel(level)
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(JSONFormatter())
    logger.handlers = []
    logger.addHandler(console_handler)
    logger.propagate = False
    return logger
