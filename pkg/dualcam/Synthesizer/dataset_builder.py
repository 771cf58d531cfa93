import logging
import os
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from glob import glob

import yaml

from dualcam.Imaging.image_io import load_image
from dualcam.Noise.rng import derive_seed, make_rng
from dualcam.Synthesizer.synth_config import SynthConfig
from dualcam.Synthesizer.synthesizer import synthesize_triplet
from dualcam.Synthesizer.triplet import write_triplet
from dualcam.Synthesizer.validator import validate_triplet_dir

logger = logging.getLogger(__name__)

INDEX_FILE = 'index.yaml'


def triplet_dir_name(index: int) -> str:
    return f'triplet_{index:04d}'


class DatasetBuilder:
    def __init__(self, input_dir: str, output_dir: str, config: SynthConfig, threads: int = 1) -> None:
        """
        Synthesize one triplet per group of 2N-1 consecutive frames.

        :param input_dir: Directory of ordered PNG frames (lexicographic order).
        :param output_dir: Directory receiving triplet_0000/, triplet_0001/, ... and index.yaml.
        :param config: Synthesis settings; config.seed is the dataset seed.
        :param threads: Worker count. Outputs do not depend on it.
        """
        self.input_dir = input_dir
        self.output_dir = output_dir
        self.config = config
        self.threads = max(1, threads)

    def plan(self) -> list[list[str]]:
        """
        Group the input frames into sequences of 2N-1.

        Raises:
            FileNotFoundError: If the input directory does not exist.
            ValueError: If there are no frames or the count is not a multiple of 2N-1.
        """
        if not os.path.isdir(self.input_dir):
            raise FileNotFoundError(f"Input directory not found: {self.input_dir}")
        frames = sorted(glob(os.path.join(self.input_dir, '*.png')))
        length = self.config.sequence_length
        if not frames:
            raise ValueError(f"No PNG frames found in {self.input_dir}.")
        if len(frames) % length:
            raise ValueError(f"{len(frames)} frames cannot be split into sequences of 2N-1 = {length} (N = {self.config.n}).")
        return [frames[i:i + length] for i in range(0, len(frames), length)]

    def build_one(self, index: int, group: list[str]) -> dict:
        """
        Synthesize and write the triplet of group `index` with its own random stream.
        """
        seed = derive_seed(self.config.seed, index)
        config = replace(self.config, seed=seed)
        frames = [load_image(path) for path in group]
        names = [os.path.basename(path) for path in group]

        triplet = synthesize_triplet(frames, config, make_rng(seed), source_frames=names)
        triplet_dir = os.path.join(self.output_dir, triplet_dir_name(index))
        write_triplet(triplet, triplet_dir)
        if not validate_triplet_dir(triplet_dir):
            raise RuntimeError(f"Triplet directory {triplet_dir} failed validation after writing.")

        logger.info(f"[Dataset] Wrote {triplet_dir_name(index)} from {names[0]} .. {names[-1]}.")
        return {'triplet': triplet_dir_name(index), 'seed': seed, 'source_frames': names}

    def run(self) -> list[dict]:
        """
        Build the whole dataset. On failure every triplet directory written by this run is removed.
        """
        groups = self.plan()
        os.makedirs(self.output_dir, exist_ok=True)

        jobs = list(enumerate(groups))
        logger.info(f"[Dataset] Starting synthesis of {len(jobs)} triplets with {self.threads} worker(s).")

        try:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                entries = list(pool.map(lambda job: self.build_one(*job), jobs))
        except Exception:
            logger.error("[Dataset] Synthesis failed, removing partial outputs.")
            for index, _ in jobs:
                shutil.rmtree(os.path.join(self.output_dir, triplet_dir_name(index)), ignore_errors=True)
            raise

        index_data = {
            'n': self.config.n,
            'ratio': self.config.ratio,
            'seed': self.config.seed,
            'triplets': entries,
        }
        with open(os.path.join(self.output_dir, INDEX_FILE), 'w', encoding='utf-8') as file:
            yaml.safe_dump(index_data, file, allow_unicode=True)
        logger.info(f"[Dataset] Index saved to {os.path.join(self.output_dir, INDEX_FILE)}")
        return entries
