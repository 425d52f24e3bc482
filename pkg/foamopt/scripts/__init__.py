from .defaults import default_config, validate_config
from ._logger import set_up_script_logger

__all__ = [default_config, validate_config, set_up_script_logger]
