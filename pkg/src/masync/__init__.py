"""Blind audio synchronization codes embedded at moving-average crossings."""
from .attacks import AttackSpec, apply_chain, parse_attack
from .core_signal import AudioClip, CrossEvent, MAParams, MASequence, find_crosses, moving_average, moving_average_fast
from .detector import DetectionReport, DetectParams, detect, extract_bit, locate_sync, scan_and_extract
from .embedder import EmbedParams, EmbedRecord, FrameLayout, choose_params, embed_frames, embed_sync, quantize_bit
from .errors import ExternalToolMissing, InsufficientCapacityError, InvalidParameterError, MasyncError, WavFormatError
from .metrics import ber, snr_measured, snr_predicted
from .sync_codes import BitSequence, FalseAlarmModel, barker, default_sync_code, false_alarm_rate, m_sequence
from .wavio import read_wav, write_wav

__all__ = [
    "AttackSpec", "apply_chain", "parse_attack",
    "AudioClip", "CrossEvent", "MAParams", "MASequence", "find_crosses", "moving_average", "moving_average_fast",
    "DetectionReport", "DetectParams", "detect", "extract_bit", "locate_sync", "scan_and_extract",
    "EmbedParams", "EmbedRecord", "FrameLayout", "choose_params", "embed_frames", "embed_sync", "quantize_bit",
    "ExternalToolMissing", "InsufficientCapacityError", "InvalidParameterError", "MasyncError", "WavFormatError",
    "BitSequence", "FalseAlarmModel", "barker", "default_sync_code", "false_alarm_rate", "m_sequence",
    "ber", "snr_measured", "snr_predicted", "read_wav", "write_wav",
]
