import envyaml
from pathlib import Path
from . import templates


def replace_special_values(config_dict, replacement_mapping):
    """
    Recursively replaces "special values" in the strings of a logconfig dictionary.

    A special value is written '+name&' and is replaced by str(replacement_mapping['name']).
    Strings that become purely numeric after replacement are cast to int.

    :param config_dict: (dict) logconfig dictionary, modified in place
    :param replacement_mapping: (dict) special value names and their replacements
    :returns: (dict) config_dict with replaced values

    Example:
        replace_special_values(
            {'handlers': {'file': {'filename': '+base_dir&/+filename&'}}},
            {'base_dir': 'logs', 'filename': 'fit.log'}
        )
        returns: {'handlers': {'file': {'filename': 'logs/fit.log'}}}
    """
    for k, v in config_dict.items():
        if isinstance(v, dict):
            replace_special_values(v, replacement_mapping)
        elif isinstance(v, str):
            for name, value in replacement_mapping.items():
                v = v.replace('+' + name + '&', str(value))
            config_dict[k] = int(v) if v.isnumeric() else v
    return config_dict


def import_config_yaml_as_dict(path_to_file, search_templates=False, replacement_mapping=None):
    """
    Imports a logconfig yaml as a Python dict. Environment variables written ${VAR} are evaluated by envyaml.

    :param path_to_file: (str or Path) path to yaml file, or template file name if search_templates
    :param search_templates: (bool) whether to resolve path_to_file against the packaged templates
    :param replacement_mapping: (dict) passed to replace_special_values
    :returns: (dict) the 'logconfig' section
    """
    if search_templates:
        src = templates.__path__
        if isinstance(src, (list, tuple)):
            src = src[0]
        path = Path(src).joinpath(path_to_file)
    else:
        path = Path(path_to_file)

    d = envyaml.EnvYAML(path, flatten=False).export().get('logconfig')

    return replace_special_values(d, replacement_mapping) if replacement_mapping else d
