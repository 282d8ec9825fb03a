import logging
import logging.config
import os
from pathlib import Path

from msgwr.config.logging.load_config import import_config_yaml_as_dict
from .config import config


def getLogger(name, config_file='console.yml', search_templates=True, level=None, update_root_level=True, **kwargs):
    """
    :param name: (str) name to assign to logging.getLogger object
    :param config_file: (str or Path) path to logconfig file
    :param search_templates: (bool) whether to search msgwr templates for config files
    :param level: (str) logger level to overwrite config file
    :param update_root_level: (bool) if True, will update root logger level.
        Only applicable if level is provided.
    :param kwargs: special values for the config file (see msgwr.config.logging.load_config.replace_special_values)
    """
    logconfig = import_config_yaml_as_dict(path_to_file=config_file, search_templates=search_templates, replacement_mapping=kwargs)

    # name logger
    logconfig['loggers'][name] = logconfig['loggers'].pop('unnamed')

    logging.config.dictConfig(logconfig)
    logger = logging.getLogger(name)

    if level is not None:
        logger.setLevel(level.upper() if isinstance(level, str) else level)
        if update_root_level:
            logging.getLogger().setLevel(logger.level)

    return logger


def set_level(level):
    """
    Sets the level of every msgwr logger and the root logger.

    :param level: (str) e.g. 'DEBUG', 'INFO'
    """
    numeric_level = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError('Invalid log level: %s' % level)
    config['loglevel'] = str(level).upper()
    logging.getLogger().setLevel(numeric_level)
    for name in list(logging.root.manager.loggerDict):
        if name == 'msgwr' or name.startswith('msgwr.'):
            logging.getLogger(name).setLevel(numeric_level)


class LogFileManager:
    def __init__(self, name, filename, base_dir=None, config_file='filehandler.yml', search_templates=True, level=None):
        """
        :param name: (str) logger name; 'msgwr' captures every package logger
        :param filename: (str or Path) path to log file relative to base_dir
        :param base_dir: (str or Path) base directory for log files
            if None - defaults to the MSGWR_LOG_BASE_DIR environment variable
        :param config_file: (str or Path) logconfig file with a file handler
        :param search_templates: (bool) whether to search msgwr templates for config files
        :param level: (str) logger level to overwrite config file
        """
        self.name = name
        self.base_dir = Path(os.getenv('MSGWR_LOG_BASE_DIR')) if base_dir is None else Path(base_dir)
        self.filename = Path(filename)
        self.filepath = self.base_dir.joinpath(self.filename)
        self.config_file = config_file
        self._search_templates = search_templates
        self.level = level

        if not self.filepath.parent.exists():
            self.filepath.parent.mkdir(exist_ok=True, parents=True)

    def __repr__(self):
        return f'LogFileManager({self.name})'

    def __call__(self, method, *args, **kwargs):
        getattr(self.logger, method)(*args, **kwargs)

    @property
    def logger(self):
        return getLogger(
            self.name,
            config_file=self.config_file,
            search_templates=self._search_templates,
            level=self.level,
            filename=self.filename,
            base_dir=self.base_dir,
        )

    def lines(self):
        """
        Returns list of lines in the log file, or None if nothing has been logged yet.
        """
        if not self.filepath.exists():
            return None
        with open(self.filepath, 'r') as f:
            return f.readlines()

    def head(self, n_entries:int=10):
        """
        Returns the first n_entries log lines.
        """
        lines = self.lines() or []
        return [l.rstrip('\n') for l in lines[:n_entries]]

    def tail(self, n_entries:int=10):
        """
        Returns the last n_entries log lines.
        """
        lines = self.lines() or []
        return [l.rstrip('\n') for l in lines[-n_entries:]] if n_entries > 0 else []
