"""Shared test fixtures: a real-world style bibliography and helpers."""

# 13-entry enumerated bibliography (speech translation literature), used for
# entry splitting, resolution, and bundle tests.
SPEECH_BIBLIOGRAPHY = [
    'A. Lee et al., "Direct speech-to-speech translation with discrete units," arXiv, 2021.',
    'A. Lee et al., "Textless speech-to-speech translation on real data," arXiv, 2021.',
    'S. Popuri et al., "Enhanced Direct Speech-to-Speech Translation Using Self-supervised '
    'Pre-training and Data Augmentation," arXiv, 2022.',
    "Ye Jia et al., Direct speech-to-speech translation with a sequence-to-sequence model. "
    "Proc. Interspeech 2019.",
    "Ye Jia et al., Translatotron 2: Robust direct speech-to-speech translation. arXiv 2021.",
    'Lavie et al., "JANUS-III: Speech-to-speech translation in multiple languages." In 1997 '
    "IEEE International Conference on Acoustics, Speech, and Signal Processing.",
    "S. Nakamura, The ATR multilingual speech-to-speech translation system. IEEE Transactions "
    "on Audio, Speech, and Language Processing, 2006.",
    "W. Hsu, HuBERT: Self-supervised speech representation learning by masked prediction of "
    "hidden units. arXiv preprint arXiv:2106.07447.",
    'C. Zhang, X. Tan et al., "UWSpeech: Speech to speech translation for unwritten languages," '
    "arXiv:2006.07926, 2020.",
    'Q. T. Do, et al., "Toward expressive speech translation: A unified sequence-to-sequence '
    'LSTMs approach for translating words and emphasis." In INTERSPEECH, 2017.',
    'P. D. Aguero, et al., "Prosody generation for speech-to-speech translation." In 2006 IEEE '
    "International Conference on Acoustics Speech and Signal Processing Proceedings, volume 1, "
    "pages I-I, 2006.",
    'G. K. Anumanchipalli et al., "Intent transfer in speech-to-speech machine translation." '
    "In 2012 IEEE Spoken Language Technology Workshop (SLT), 2012.",
    'A. Tjandra et al., "Speech-to-speech translation between untranscribed unknown languages." '
    "In 2019 IEEE Automatic Speech Recognition and Understanding Workshop (ASRU), 2019.",
]
