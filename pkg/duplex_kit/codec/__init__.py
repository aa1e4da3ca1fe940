from .rvq import Codebook, CodecFrame, RvqCodec
from .services import CodecService
from .speech import MockSpeechCoder

__all__ = ["Codebook", "CodecFrame", "CodecService", "MockSpeechCoder", "RvqCodec"]
