#!/usr/bin/env python3
# encoding: UTF-8

import logging
from logging.handlers import RotatingFileHandler
from typing import Optional


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None,
                  console_level: Optional[str] = None) -> logging.Logger:
    """
    Centralized logging configuration to prevent duplicate logs

    Args:
        log_level: level of the root logger and the log file
        log_file: optional rotating log file
        console_level: console threshold, defaults to log_level
    """
    numeric_level = getattr(logging, log_level.upper(), logging.INFO)
    console_numeric = getattr(logging, (console_level or log_level).upper(), numeric_level)

    console_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    file_formatter = logging.Formatter(
        "[ %(asctime)s ] %(levelname)s : %(message)s"
    )

    console_handler = logging.StreamHandler()
    console_handler.setLevel(console_numeric)
    console_handler.setFormatter(console_formatter)

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)

    # Remove all existing handlers to prevent duplicates
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    root_logger.addHandler(console_handler)

    if log_file:
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=10*1024*1024,  # 10MB
            backupCount=5
        )
        file_handler.setLevel(numeric_level)
        file_handler.setFormatter(file_formatter)
        root_logger.addHandler(file_handler)

    component_levels = {
        "mldas.traffic": numeric_level,
        "mldas.features": numeric_level,
        "mldas.ml": numeric_level,
        "mldas.selector": numeric_level,
        "mldas.controller": numeric_level,
        # The simulated clock is Twisted's; its own chatter is not useful here
        "twisted": logging.WARNING,
    }
    for logger_name, level in component_levels.items():
        logging.getLogger(logger_name).setLevel(level)

    return root_logger


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance that won't create duplicate logs
    """
    logger = logging.getLogger(name)
    # Child loggers use the root logger's handlers
    logger.propagate = True
    return logger
