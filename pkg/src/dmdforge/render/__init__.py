"""Scene sampling, engine bridge and render post-processing."""
from .backends import BlenderBackend, MockBackend, RenderBackend, RenderOutput, make_backend
from .batch import BatchRenderer, DisplayEntry, filter_devices, load_display_entries, render_batch
from .camera import CameraPose, check_full_visibility, compute_camera_pose, project_point
from .directives import (
    build_scene_directives,
    compute_uv_transform,
    apply_uv_transform,
    dump_directives,
    parse_directives,
)
from .post import apply_motion_blur, depth_to_mask, make_motion_kernel
from .records import RECORD_COLUMNS, RenderRecord, read_records, write_records
from .scene import (
    DEFAULT_PALETTE,
    DeviceModel,
    RenderRanges,
    SceneSample,
    load_device_registry,
    resample_until_visible,
    rotated_corners,
    sample_scene,
)
