# -*- coding: utf-8 -*-

"""mtsclust: static and dynamic clustering forecasters for sparse
multivariate time series, together with their evaluation protocol.
"""

import logging

# Attach a do-nothing NullHandler to the top-level logger, so that library
# log messages are dropped silently unless the user configures a handler.
logging.getLogger(__name__).addHandler(logging.NullHandler())
