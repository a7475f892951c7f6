"""The eight bundled run configurations, M1..M8.

Each preset fixes the segment policy, the filter widths, the training-data
augmentation source and the embedding provider family. All share 32 filters
per width, Adam at lr 2e-5, 8 epochs, batch size 10.

Presets that expect a precomputed static-vector file fall back to a
trainable table (with a warning) when no file is supplied, so every preset
runs out of the box; scores published for the original contextual-encoder
features are reference points in that case, not expectations.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .data import AugmentMode
from .errors import ConfigError
from .features import ProviderKind
from .preprocess import ConsolidationMap, PreprocessPolicy, SegmentAction

FILTERS_PER_WIDTH = 32


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    policy: PreprocessPolicy
    filter_widths: tuple[int, ...]
    augment: AugmentMode
    provider_kind: ProviderKind

    def with_consolidation(self, cmap: ConsolidationMap) -> "Preset":
        return replace(self, policy=replace(self.policy, consolidation=cmap))


def _policy(
    hashtag: SegmentAction,
    mention: SegmentAction,
    url: SegmentAction,
    numeric: SegmentAction,
    lowercase: bool,
) -> PreprocessPolicy:
    cons = (
        ConsolidationMap({})
        if SegmentAction.ROOT_MAP in (hashtag, mention, url, numeric)
        else None
    )
    return PreprocessPolicy(
        hashtag=hashtag,
        mention=mention,
        url=url,
        numeric=numeric,
        lowercase=lowercase,
        consolidation=cons,
    )


_K, _R, _S, _M = (
    SegmentAction.KEEP,
    SegmentAction.REMOVE,
    SegmentAction.SPECIAL_TOKEN,
    SegmentAction.ROOT_MAP,
)

_DIGITS_ONLY = _policy(hashtag=_K, mention=_K, url=_K, numeric=_S, lowercase=True)

PRESETS: dict[str, Preset] = {
    "M1": Preset(
        name="M1",
        description=(
            "Heavy normalization: mentions and hashtags consolidated to roots "
            "(special tokens when unmapped), URLs and numbers as special tokens; "
            "widths 2/4/7; static vectors."
        ),
        policy=_policy(hashtag=_M, mention=_M, url=_S, numeric=_S, lowercase=False),
        filter_widths=(2, 4, 7),
        augment=AugmentMode.NONE,
        provider_kind=ProviderKind.PRECOMPUTED,
    ),
    "M2": Preset(
        name="M2",
        description=(
            "Light normalization: numbers as special tokens, mentions/URLs/"
            "hashtags dropped; widths 2/4; static vectors."
        ),
        policy=_policy(hashtag=_R, mention=_R, url=_R, numeric=_S, lowercase=False),
        filter_widths=(2, 4),
        augment=AugmentMode.NONE,
        provider_kind=ProviderKind.PRECOMPUTED,
    ),
    "M3": Preset(
        name="M3",
        description=(
            "Numbers as special tokens, lowercased; training set augmented "
            "with rumour-labelled conversations; widths 2/4/7; static vectors."
        ),
        policy=_DIGITS_ONLY,
        filter_widths=(2, 4, 7),
        augment=AugmentMode.PHEME_RUMOURS_ONLY,
        provider_kind=ProviderKind.PRECOMPUTED,
    ),
    "M4": Preset(
        name="M4",
        description=(
            "All special segments dropped, lowercased; embeddings trained "
            "with the model plus per-tweet TF-IDF features; widths 2/4/7."
        ),
        policy=_policy(hashtag=_R, mention=_R, url=_R, numeric=_R, lowercase=True),
        filter_widths=(2, 4, 7),
        augment=AugmentMode.NONE,
        provider_kind=ProviderKind.TFIDF_CONCAT,
    ),
    "M5": Preset(
        name="M5",
        description=(
            "Numbers as special tokens, lowercased; training set augmented "
            "with the veracity corpora; widths 2/4/7; static vectors."
        ),
        policy=_DIGITS_ONLY,
        filter_widths=(2, 4, 7),
        augment=AugmentMode.TW1516,
        provider_kind=ProviderKind.PRECOMPUTED,
    ),
    "M6": Preset(
        name="M6",
        description=(
            "Numbers as special tokens, lowercased; training set augmented "
            "with all external corpora; widths 2/4/7; static vectors."
        ),
        policy=_DIGITS_ONLY,
        filter_widths=(2, 4, 7),
        augment=AugmentMode.PHEME_PLUS_TW1516,
        provider_kind=ProviderKind.PRECOMPUTED,
    ),
    "M7": Preset(
        name="M7",
        description="No normalization at all; widths 2/4/7; static vectors.",
        policy=_policy(hashtag=_K, mention=_K, url=_K, numeric=_K, lowercase=False),
        filter_widths=(2, 4, 7),
        augment=AugmentMode.NONE,
        provider_kind=ProviderKind.PRECOMPUTED,
    ),
    "M8": Preset(
        name="M8",
        description=(
            "External corpora only (no in-domain training data); numbers as "
            "special tokens, lowercased; widths 2/4/7; static vectors."
        ),
        policy=_DIGITS_ONLY,
        filter_widths=(2, 4, 7),
        augment=AugmentMode.EXTERNAL_ONLY,
        provider_kind=ProviderKind.PRECOMPUTED,
    ),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
