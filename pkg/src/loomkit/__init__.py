"""Visual looming (L = -rdot/r) from camera motion, motion-field partials and dense flow."""
from .errors import LoomError
from .looming import (LoomingSphere, LoomingValue, LoomKind, PartialsSample, RecoveredRotation,
                      equal_looming_sphere, error_percent, looming_discrete, looming_est1,
                      looming_est2, looming_est_avg, looming_exact_phi, looming_exact_theta,
                      looming_from_radial, looming_ground_truth, looming_tilt_phi,
                      looming_tilt_theta, recover_rotation)
from .motion import (FieldSample, MotionState, SphericalMotionComponents, decompose,
                     field_sample, relative_velocity)
from .spherical import (CameraIntrinsics, Direction, Frame, cart_to_spherical,
                        direction_to_pixel, frame_at, pixel_to_direction)
from .surface import (PlanarPatch, TiltAngles, log_range_partials, patch_normal,
                      plane_field, ray_range, tilt_angles)

__version__ = "0.1.0"
