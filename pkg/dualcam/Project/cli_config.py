import logging
import os
from dataclasses import dataclass, field, replace

import yaml

from dualcam.Deblur.deconvolver import DeconvOptions
from dualcam.Denoise.burst_merger import MergeConfig
from dualcam.Flow.flow_field import FlowConfig
from dualcam.Fusion.fusion import FusionConfig
from dualcam.Isp.isp_config import IspConfig
from dualcam.Synthesizer.synth_config import SynthConfig

logger = logging.getLogger(__name__)

SECTIONS = {
    'isp': IspConfig,
    'synth': SynthConfig,
    'flow': FlowConfig,
    'deconv': DeconvOptions,
    'merge': MergeConfig,
    'fusion': FusionConfig,
}


@dataclass(frozen=True)
class CliConfig:
    """
    All pipeline settings, one section per stage. The isp section is shared with synthesis.
    """
    isp: IspConfig = field(default_factory=IspConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)
    deconv: DeconvOptions = field(default_factory=DeconvOptions)
    merge: MergeConfig = field(default_factory=MergeConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)

    def __post_init__(self):
        if self.synth.isp != self.isp:
            object.__setattr__(self, 'synth', replace(self.synth, isp=self.isp))

    @classmethod
    def from_dict(cls, data: dict) -> 'CliConfig':
        """
        Build from a mapping of section name -> section mapping. Missing sections keep their defaults.

        :raises ValueError: On unknown sections or unknown keys inside a section.
        """
        if not isinstance(data, dict):
            raise ValueError(f"Config root must be a mapping, got {type(data).__name__}.")
        unknown = set(data) - set(SECTIONS)
        if unknown:
            raise ValueError(f"Unknown config sections: {sorted(unknown)}. Known sections: {sorted(SECTIONS)}.")
        sections = {}
        for name, section_cls in SECTIONS.items():
            values = data.get(name) or {}
            if not isinstance(values, dict):
                raise ValueError(f"Config section '{name}' must be a mapping.")
            if name == 'synth' and 'isp' in values:
                raise ValueError("ISP settings belong in the top-level 'isp' section, not under 'synth'.")
            sections[name] = section_cls.from_dict(values)
        return cls(**sections)

    @classmethod
    def from_file(cls, path: str | None) -> 'CliConfig':
        """
        Load a YAML or JSON config file; None gives the defaults.
        """
        if path is None:
            return cls()
        if not os.path.isfile(path):
            raise FileNotFoundError(f"Config file not found: {path}")
        with open(path, 'r', encoding='utf-8') as file:
            data = yaml.safe_load(file) or {}
        logger.debug(f"[Cli] Loaded config from {path}")
        return cls.from_dict(data)

    def with_overrides(self, section: str, **values) -> 'CliConfig':
        """
        Replace fields of one section; None values are treated as "flag not given".
        """
        given = {key: value for key, value in values.items() if value is not None}
        if not given:
            return self
        updated = replace(getattr(self, section), **given)
        if section == 'isp':
            return replace(self, isp=updated)
        return replace(self, **{section: updated})

    def to_dict(self) -> dict:
        data = {name: getattr(self, name).to_dict() for name in SECTIONS}
        del data['synth']['isp']
        return data

    def to_yaml(self, path: str) -> None:
        with open(path, 'w', encoding='utf-8') as file:
            yaml.safe_dump(self.to_dict(), file, sort_keys=False)
