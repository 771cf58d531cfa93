import json
import logging
import os
import re
from glob import glob

from dualcam.Synthesizer.triplet import GT_FILE, LONG_FILE, META_FILE, burst_file

logger = logging.getLogger(__name__)

_BURST_PATTERN = re.compile(r'^burst_(\d+)\.png$')


def list_burst_files(burst_dir: str) -> list[str]:
    """
    Burst frames of a directory ordered by their numeric index (burst_0.png, burst_1.png, ...).
    """
    indexed = []
    for path in glob(os.path.join(burst_dir, 'burst_*.png')):
        if match := _BURST_PATTERN.match(os.path.basename(path)):
            indexed.append((int(match.group(1)), path))
    return [path for _, path in sorted(indexed)]


def find_missing_burst(burst_dir: str, n: int | None = None) -> list[str]:
    """
    Paths of burst files missing from `burst_dir`.

    Without `n` the expected count is inferred from the highest index present.
    """
    present = {int(_BURST_PATTERN.match(os.path.basename(p)).group(1)) for p in list_burst_files(burst_dir)}
    if n is None:
        n = max(present) + 1 if present else 1
    return [os.path.join(burst_dir, burst_file(i)) for i in range(n) if i not in present]


def validate_triplet_dir(triplet_dir: str) -> bool:
    """
    Compare meta.json against the image files of a triplet directory.
        :param triplet_dir: Directory written by write_triplet.
        :return: True if the metadata and the files agree, False otherwise.
    """
    meta_path = os.path.join(triplet_dir, META_FILE)
    if not os.path.isfile(meta_path):
        logger.warning(f"[Dataset] No metadata file in {triplet_dir}.")
        return False

    with open(meta_path, 'r', encoding='utf-8') as file:
        meta = json.load(file)

    n = meta.get('n')
    if not isinstance(n, int) or n < 1:
        logger.warning(f"[Dataset] Invalid burst size {n!r} in {meta_path}.")
        return False

    missing = [os.path.join(triplet_dir, name) for name in (LONG_FILE, GT_FILE)
               if not os.path.isfile(os.path.join(triplet_dir, name))]
    missing += find_missing_burst(triplet_dir, n)
    if missing:
        logger.warning(f"[Dataset] Missing files for {triplet_dir}: {missing}")
        return False

    extra = len(list_burst_files(triplet_dir)) - n
    if extra > 0:
        logger.warning(f"[Dataset] {extra} extra burst files found in {triplet_dir}.")
        return False

    return True
