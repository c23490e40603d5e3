#!/usr/bin/env python3
"""
Volsr Application Services
==========================

Configuration management and run registry used by the command-line tool.

Version: 1.0.0
"""

__version__ = '1.0.0'
