import json
from pathlib import Path
from typing import Dict, List

from importlib_resources import files as file_resources
from jsonschema import Draft202012Validator

from .errors import ModelFileError


def load_schema(model: str = "model") -> Dict:
    schema = (
        file_resources("crawler_threshold")
        .joinpath(Path("schemas") / f"{model}.schema.json")
        .read_text()
    )
    return json.loads(schema)


def schema_errors(document: Dict) -> List[str]:
    validator = Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    return [
        f"{'/'.join(str(p) for p in error.absolute_path) or '<root>'}: {error.message}"
        for error in errors
    ]


def validate(document: Dict):
    """Raise ModelFileError listing every schema violation of a model document."""
    errors = schema_errors(document)
    if errors:
        msg = f"Model file has {len(errors)} schema error(s): " + "; ".join(errors)
        raise ModelFileError(msg, errors)
