# -*- coding: utf-8 -*-

__title__ = 'mldas'
__version__ = '0.3.0'
__short_version__ = '.'.join(__version__.split('.')[:2])
__license__ = 'MIT'

from .errors import MldasError

__all__ = ["MldasError", "__version__"]
