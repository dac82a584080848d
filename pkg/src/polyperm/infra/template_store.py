from __future__ import annotations

import logging
from pathlib import Path

from pydantic import ValidationError

from polyperm.domain.errors import FormatError
from polyperm.domain.models import TemplateDocument
from polyperm.domain.solver import SolverTemplate, template_from_document, template_to_document
from polyperm.utils.logging import get_logger


class TemplateStore:
    """
    JSON files holding one elimination template each.

    :param logger: Logger.
    """

    def __init__(self, logger: logging.Logger | None = None) -> None:
        self._logger: logging.Logger = logger or get_logger()

    def save(self, t: SolverTemplate, path: Path) -> Path:
        """
        Write a template.

        :param t: Template.
        :param path: Destination; parent directories are created.
        :return: The written path.
        """
        path.parent.mkdir(parents=True, exist_ok=True)
        doc: TemplateDocument = template_to_document(t)
        path.write_text(doc.model_dump_json(indent=2), encoding="utf-8")
        self._logger.info(f"Template saved path={path} problem={t.config.label()} basis={t.bezout}")
        return path

    def load(self, path: Path) -> SolverTemplate:
        """
        Read and validate a template.

        :param path: Source file.
        :return: SolverTemplate.
        :raises FileNotFoundError: If the file does not exist.
        :raises FormatError: If the document is malformed, of another schema version or inconsistent.
        """
        raw: str = path.read_text(encoding="utf-8")
        try:
            doc: TemplateDocument = TemplateDocument.model_validate_json(raw)
            t: SolverTemplate = template_from_document(doc)
        except ValidationError as exc:
            raise FormatError(f"Invalid template document {path}: {exc.error_count()} validation errors.") from exc
        except ValueError as exc:
            raise FormatError(f"Inconsistent template document {path}: {exc}") from exc
        self._logger.debug(f"Template loaded path={path} problem={t.config.label()}")
        return t
