use crate::error::{Error, Result};

/// `H × W × C` image, channel-interleaved row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    h: usize,
    w: usize,
    c: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(h: usize, w: usize, c: usize, data: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(Error::InvalidInput("image dimensions must be positive".into()));
        }
        if c != 1 && c != 3 {
            return Err(Error::InvalidInput(format!("images have 1 or 3 channels, got {c}")));
        }
        if data.len() != h * w * c {
            return Err(Error::ShapeMismatch {
                context: "image",
                expected: h * w * c,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("image values must be finite".into()));
        }
        Ok(Self { h, w, c, data })
    }

    pub fn filled(h: usize, w: usize, c: usize, value: f64) -> Result<Self> {
        Self::new(h, w, c, vec![value; h * w * c])
    }

    pub fn zeros_like(other: &Image) -> Image {
        Image {
            data: vec![0.0; other.data.len()],
            ..*other
        }
    }

    /// Same shape as `self`, new contents. Panics on a length mismatch.
    pub fn with_data(&self, data: Vec<f64>) -> Image {
        assert_eq!(data.len(), self.data.len(), "image buffer length");
        Image { data, ..*self }
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        (self.h, self.w, self.c) == (other.h, other.w, other.c)
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, ch: usize) -> usize {
        (y * self.w + x) * self.c + ch
    }

    pub fn get(&self, y: usize, x: usize, ch: usize) -> f64 {
        self.data[self.index(y, x, ch)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Circular shift: pixel `(y, x)` moves to `(y + dy, x + dx)` modulo the size.
    pub fn roll(&self, dy: isize, dx: isize) -> Image {
        let (h, w) = (self.h as isize, self.w as isize);
        let mut out = Image::zeros_like(self);
        for y in 0..self.h {
            let ty = (y as isize + dy).rem_euclid(h) as usize;
            for x in 0..self.w {
                let tx = (x as isize + dx).rem_euclid(w) as usize;
                for ch in 0..self.c {
                    let v = self.get(y, x, ch);
                    let i = out.index(ty, tx, ch);
                    out.data[i] = v;
                }
            }
        }
        out
    }

    /// 3×3 box filter per channel, borders replicated.
    pub fn box_blur3(&self) -> Image {
        let mut out = Image::zeros_like(self);
        for y in 0..self.h {
            for x in 0..self.w {
                for ch in 0..self.c {
                    let mut acc = 0.0;
                    for oy in -1isize..=1 {
                        let sy = (y as isize + oy).clamp(0, self.h as isize - 1) as usize;
                        for ox in -1isize..=1 {
                            let sx = (x as isize + ox).clamp(0, self.w as isize - 1) as usize;
                            acc += self.get(sy, sx, ch);
                        }
                    }
                    let i = out.index(y, x, ch);
                    out.data[i] = acc / 9.0;
                }
            }
        }
        out
    }
}
