"""Process-aware essay feedback: keystroke capture, revision analytics,
LLM-backed two-part feedback, and a post-task survey, behind an HTTP
service with append-only persistence."""

__version__ = "0.1.0"
