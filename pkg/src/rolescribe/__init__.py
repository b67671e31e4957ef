"""Joint speech recognition and speaker-role diarization via sequence transduction.

A single RNN-T whose output inventory carries speaker-role tokens produces
role-decorated transcripts directly from feature frames; a conventional
multi-stage diarization pipeline and a word-level diarization error metric
(WDER) are included for comparison.
"""

__version__ = "0.1.0"
