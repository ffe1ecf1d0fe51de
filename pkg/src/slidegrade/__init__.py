"""slidegrade: rubric-based scoring and bilingual feedback for slide decks."""

__version__ = "0.1.0"
