import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from dualcam.Deblur.deconvolver import DeconvOptions, deconvolve_with_trace
from dualcam.Deblur.trajectory import TrajectoryField, build_trajectories
from dualcam.Denoise.burst_merger import MergeConfig, WeightMap, merge_burst_with_weights
from dualcam.Flow.flow_field import FlowConfig, FlowField
from dualcam.Flow.lucas_kanade import estimate_flow
from dualcam.Fusion.fusion import FusionConfig, fuse
from dualcam.Imaging.image_buffer import ImageBuffer, require_same_shape
from dualcam.Isp.isp_config import IspConfig

logger = logging.getLogger(__name__)


@dataclass
class RestoreResult:
    image: ImageBuffer
    deblurred: ImageBuffer
    denoised: ImageBuffer
    weights: WeightMap
    flows: list[FlowField]
    trajectory: TrajectoryField
    trace: list[float] = field(default_factory=list)


class Restorer:
    def __init__(self, flow_cfg: FlowConfig = FlowConfig(), deconv_opts: DeconvOptions = DeconvOptions(),
                 merge_cfg: MergeConfig = MergeConfig(), fusion_cfg: FusionConfig = FusionConfig(),
                 isp_cfg: IspConfig = IspConfig(), kernel: int = 3, threads: int = 1):
        """
        Joint deblur + denoise pipeline over one long exposure and its burst.

        :param kernel: Trajectory kernel side K; each pixel gets K^2 trajectory samples.
        :param threads: Worker count for flow estimation and the two branches. Results do not depend on it.
        """
        self.flow_cfg = flow_cfg
        self.deconv_opts = deconv_opts
        self.merge_cfg = merge_cfg
        self.fusion_cfg = fusion_cfg
        self.isp_cfg = isp_cfg
        self.kernel = kernel
        self.threads = max(1, threads)

    def estimate_flows(self, burst: Sequence[ImageBuffer], pool: ThreadPoolExecutor) -> list[FlowField]:
        """
        Flows from the middle frame to every burst frame; the reference gets an exact zero flow.
        """
        reference = len(burst) // 2

        def flow_to(index: int) -> FlowField:
            if index == reference:
                return FlowField.zeros(burst[reference].height, burst[reference].width)
            return estimate_flow(burst[reference], burst[index], self.flow_cfg)

        return list(pool.map(flow_to, range(len(burst))))

    def run(self, long: ImageBuffer, burst: Sequence[ImageBuffer],
            flows: Sequence[FlowField] | None = None) -> RestoreResult:
        """
        Restore a sharp, clean image from the long exposure and the burst.

        :param long: Blurry long exposure (sRGB).
        :param burst: Odd-length noisy burst (sRGB), middle frame is the reference.
        :param flows: Precomputed reference-to-frame flows; estimated when omitted.
        :raises ValueError: On an even burst, mismatched shapes or a wrong flow count.
        """
        if not burst or len(burst) % 2 == 0:
            raise ValueError(f"Burst size must be odd, got {len(burst)}.")
        require_same_shape(long, *burst, operation='restore')
        if flows is not None and len(flows) != len(burst):
            raise ValueError(f"Got {len(flows)} flows for a burst of {len(burst)} frames.")

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            if flows is None:
                logger.info(f"[Restore] Estimating {len(burst) - 1} flows with {self.threads} worker(s).")
                flows = self.estimate_flows(burst, pool)
            flows = list(flows)
            trajectory = build_trajectories(flows, self.kernel)

            deblur_job = pool.submit(deconvolve_with_trace, long, trajectory, self.deconv_opts, self.isp_cfg)
            denoise_job = pool.submit(merge_burst_with_weights, burst, flows, self.merge_cfg, self.isp_cfg)
            deconv_result = deblur_job.result()
            denoised, weights = denoise_job.result()

        image = fuse(deconv_result.image, denoised, long, self.fusion_cfg)
        logger.info(f"[Restore] Fused {len(burst)}-frame burst with the long exposure ({self.fusion_cfg.mode}).")
        return RestoreResult(image, deconv_result.image, denoised, weights, flows, trajectory, deconv_result.trace)


def restore(long: ImageBuffer, burst: Sequence[ImageBuffer], flow_cfg: FlowConfig = FlowConfig(),
            deconv_opts: DeconvOptions = DeconvOptions(), merge_cfg: MergeConfig = MergeConfig(),
            fusion_cfg: FusionConfig = FusionConfig(), isp_cfg: IspConfig = IspConfig()) -> ImageBuffer:
    return Restorer(flow_cfg, deconv_opts, merge_cfg, fusion_cfg, isp_cfg).run(long, burst).image
