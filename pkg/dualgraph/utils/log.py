import bittensor as bt


def log_dict(data, truncate=100, indent=0, log=None):
    """
    Logs the contents of a (nested) dictionary at debug level, truncating values
    that exceed a certain length.

    Args:
        data: The dictionary to log
        truncate: The maximum number of characters for each value
        indent: The current indentation level (used for recursive formatting)
        log: logging function, defaults to bt.logging.debug
    """
    log = log or bt.logging.debug

    def short(value):
        text = str(value)
        return text[:truncate] + "..." if len(text) > truncate else text

    for key, value in data.items():
        prefix = " " * indent
        if isinstance(value, dict):
            log(f"{prefix}{key}: {{")
            log_dict(value, truncate, indent + 2, log)
            log(f"{prefix}}}")
        elif isinstance(value, list):
            log(f"{prefix}{key}: [")
            for item in value:
                if isinstance(item, dict):
                    log_dict(item, truncate, indent + 2, log)
                else:
                    log(f"{' ' * (indent + 2)}{short(item)}")
            log(f"{prefix}]")
        else:
            log(f"{prefix}{key}: {short(value)}")
