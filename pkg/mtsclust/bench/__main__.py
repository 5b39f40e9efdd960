# -*- coding: utf-8 -*-

import sys

from mtsclust.bench.cli import main


sys.exit(main())
