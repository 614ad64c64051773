"""Annotation workbench for semi-structured clinical-style reports.

Pipeline stages: segment reports into sections, build per-group extraction
prompts for a small local language model, repair malformed JSON output,
score runs against gold labels, triage inter-model disagreements into a
priority-weighted review queue, and serve the whole thing to a browser UI.
"""

__version__ = "0.1.0"
