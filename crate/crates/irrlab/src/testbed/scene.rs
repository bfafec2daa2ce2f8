//! The server's scene: a textured cube on a dark background, rotated left
//! or right by a configurable step per interaction and rendered in software.
//!
//! Rendering is a pure function of the rotation angle — no GPU, no time
//! dependence — so identical angles produce byte-identical frames and every
//! reachable angle produces a visibly distinct frame. Faces carry distinct
//! base colors, a checker texture and angle-dependent shading, which makes
//! even a single rotation step move plenty of pixels in the frame centre
//! (where an observer's region of interest typically sits).

use crate::frame::PixelBuffer;
use crate::testbed::TestbedError;

/// Camera tilt (radians) about the horizontal axis, applied after the
/// interaction-controlled rotation so the top face stays visible.
const TILT: f64 = 0.42;

/// Checker cells per face edge.
const CHECKER_CELLS: f64 = 4.0;

/// Per-face base colors (+X, -X, +Y, -Y, +Z, -Z).
const FACE_COLORS: [[f64; 3]; 6] = [
    [215.0, 80.0, 60.0],
    [60.0, 150.0, 215.0],
    [230.0, 200.0, 70.0],
    [130.0, 90.0, 200.0],
    [80.0, 200.0, 120.0],
    [220.0, 120.0, 180.0],
];

const BACKGROUND: [u8; 3] = [18, 18, 26];

/// Rotation state and render parameters for the server scene.
#[derive(Debug, Clone)]
pub struct ServerSceneState {
    angle_degrees: f64,
    pub rotation_step: f64,
    pub width: u32,
    pub height: u32,
}

impl ServerSceneState {
    pub fn new(width: u32, height: u32, rotation_step: f64) -> Self {
        Self {
            angle_degrees: 0.0,
            rotation_step,
            width,
            height,
        }
    }

    /// Current rotation angle, always in [0, 360).
    pub fn angle_degrees(&self) -> f64 {
        self.angle_degrees
    }

    /// Applies one interaction: 'a' rotates left, 'd' rotates right. Any
    /// other character is rejected with the state unchanged.
    pub fn apply_interaction(&mut self, c: char) -> Result<(), TestbedError> {
        match c {
            'a' => self.rotate(-self.rotation_step),
            'd' => self.rotate(self.rotation_step),
            other => return Err(TestbedError::InvalidInteraction(other)),
        }
        Ok(())
    }

    fn rotate(&mut self, delta: f64) {
        self.angle_degrees = (self.angle_degrees + delta).rem_euclid(360.0);
    }

    /// Renders the scene at the current angle.
    pub fn render(&self) -> PixelBuffer {
        render_scene(self.width, self.height, self.angle_degrees)
    }
}

impl Default for ServerSceneState {
    fn default() -> Self {
        Self::new(256, 256, 5.0)
    }
}

/// Renders the cube at `angle_degrees` into a fresh RGB8 buffer. The angle
/// is normalized into [0, 360) first so wrapped angles render byte-identical
/// frames.
pub fn render_scene(width: u32, height: u32, angle_degrees: f64) -> PixelBuffer {
    let mut buf = PixelBuffer::filled(width, height, BACKGROUND);
    let angle = angle_degrees.rem_euclid(360.0).to_radians();
    let (sin_a, cos_a) = angle.sin_cos();
    let (sin_t, cos_t) = TILT.sin_cos();

    // Rotation about the vertical axis, then the fixed camera tilt.
    let rotate = |v: [f64; 3]| -> [f64; 3] {
        let x = v[0] * cos_a + v[2] * sin_a;
        let z = -v[0] * sin_a + v[2] * cos_a;
        let y = v[1] * cos_t - z * sin_t;
        let z = v[1] * sin_t + z * cos_t;
        [x, y, z]
    };

    let scale = 0.33 * f64::from(width.min(height));
    let cx = f64::from(width) * 0.5;
    let cy = f64::from(height) * 0.5;
    let project = |v: [f64; 3]| -> [f64; 2] { [cx + scale * v[0], cy - scale * v[1]] };

    // Quads in outward-facing order with their unit normals; texture
    // coordinates run (0,0),(1,0),(1,1),(0,1) around each quad.
    #[rustfmt::skip]
    let faces: [([f64; 3], [[f64; 3]; 4]); 6] = [
        ([1.0, 0.0, 0.0],  [[1.0, -1.0, -1.0], [1.0, -1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, -1.0]]),
        ([-1.0, 0.0, 0.0], [[-1.0, -1.0, 1.0], [-1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, 1.0, 1.0]]),
        ([0.0, 1.0, 0.0],  [[-1.0, 1.0, -1.0], [1.0, 1.0, -1.0], [1.0, 1.0, 1.0], [-1.0, 1.0, 1.0]]),
        ([0.0, -1.0, 0.0], [[-1.0, -1.0, 1.0], [1.0, -1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, -1.0, -1.0]]),
        ([0.0, 0.0, 1.0],  [[1.0, -1.0, 1.0], [-1.0, -1.0, 1.0], [-1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]),
        ([0.0, 0.0, -1.0], [[-1.0, -1.0, -1.0], [1.0, -1.0, -1.0], [1.0, 1.0, -1.0], [-1.0, 1.0, -1.0]]),
    ];

    let light = normalize([0.35, 0.55, 0.75]);

    for (face_idx, (normal, quad)) in faces.iter().enumerate() {
        let n = rotate(*normal);
        // Camera looks down -z; cull faces pointing away. The cube is
        // convex, so visible faces never overlap and need no depth sort.
        if n[2] <= 1e-9 {
            continue;
        }
        let shade = (n[0] * light[0] + n[1] * light[1] + n[2] * light[2]).clamp(0.25, 1.0);
        let base = FACE_COLORS[face_idx];

        let p: Vec<[f64; 2]> = quad.iter().map(|v| project(rotate(*v))).collect();
        let uv = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        fill_textured_triangle(&mut buf, [p[0], p[1], p[2]], [uv[0], uv[1], uv[2]], base, shade);
        fill_textured_triangle(&mut buf, [p[0], p[2], p[3]], [uv[0], uv[2], uv[3]], base, shade);
    }

    buf
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / len, v[1] / len, v[2] / len]
}

fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

fn fill_textured_triangle(
    buf: &mut PixelBuffer,
    tri: [[f64; 2]; 3],
    uv: [[f64; 2]; 3],
    base: [f64; 3],
    shade: f64,
) {
    let area = edge(tri[0], tri[1], tri[2]);
    if area.abs() < 1e-9 {
        return;
    }

    let min_x = tri.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min).floor().max(0.0) as u32;
    let max_x = tri.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max).ceil() as i64;
    let min_y = tri.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min).floor().max(0.0) as u32;
    let max_y = tri.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max).ceil() as i64;
    let max_x = max_x.clamp(0, i64::from(buf.width())) as u32;
    let max_y = max_y.clamp(0, i64::from(buf.height())) as u32;

    for y in min_y..max_y {
        for x in min_x..max_x {
            let p = [f64::from(x) + 0.5, f64::from(y) + 0.5];
            // Barycentric weights, normalized by the signed area so the
            // inside test works for either winding.
            let w0 = edge(tri[1], tri[2], p) / area;
            let w1 = edge(tri[2], tri[0], p) / area;
            let w2 = edge(tri[0], tri[1], p) / area;
            if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                continue;
            }
            let u = w0 * uv[0][0] + w1 * uv[1][0] + w2 * uv[2][0];
            let v = w0 * uv[0][1] + w1 * uv[1][1] + w2 * uv[2][1];
            let cell = ((u * CHECKER_CELLS).floor() + (v * CHECKER_CELLS).floor()) as i64;
            let tone = if cell.rem_euclid(2) == 0 { 1.0 } else { 0.68 };
            let rgb = [
                (base[0] * shade * tone).round().clamp(0.0, 255.0) as u8,
                (base[1] * shade * tone).round().clamp(0.0, 255.0) as u8,
                (base[2] * shade * tone).round().clamp(0.0, 255.0) as u8,
            ];
            buf.set_pixel(x, y, rgb);
        }
    }
}
