import json
from pathlib import Path
from typing import Optional

from config import get_settings


class LanguageManager:
    """
    Loads the user-facing message catalog for the CLI.
    The language comes from MMDINF_LANG (see config.py); unknown keys fall
    back to the key itself so a missing translation never crashes a run.
    """
    def __init__(self, lang_code: Optional[str] = None):
        self.lang_code = lang_code or get_settings().lang
        self.base_path = Path(__file__).parent / "locales" / self.lang_code
        self.static_text = self._load_static_text()

    def _load_static_text(self) -> dict:
        file_path = self.base_path / "static_text.json"
        if not file_path.exists():
            raise FileNotFoundError(f"Static text file not found for language '{self.lang_code}'")
        return json.loads(file_path.read_text(encoding="utf-8"))

    def t(self, key: str, **kwargs) -> str:
        """
        Retrieves a message by key and formats it,
        e.g. t("DECISION_REJECT", alpha=0.05)
        """
        return self.static_text.get(key, key).format(**kwargs)


lang_manager = LanguageManager()
