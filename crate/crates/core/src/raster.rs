//! Dense per-pixel grids and the binary label type.

/// An RGB color value, 8 bits per channel.
pub type Rgb = [u8; 3];

/// Two-class per-pixel label: the background subtractor's output and the
/// fused output are both of this type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Label {
    Background,
    Foreground,
}

/// Row-major grid of per-pixel values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Copy> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Wraps an existing row-major buffer. Panics if the length does not
    /// match the dimensions.
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height, "raster buffer length");
        Raster {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn count(&self, value: T) -> usize
    where
        T: PartialEq,
    {
        self.data.iter().filter(|v| **v == value).count()
    }
}

/// 3x3 majority filter over a binary mask, used as an optional output
/// post-filter. A pixel becomes foreground when foreground holds a strict
/// majority of its in-bounds 3x3 neighborhood (center included); ties go
/// to background.
pub fn median3x3(mask: &Raster<Label>) -> Raster<Label> {
    let (w, h) = (mask.width(), mask.height());
    let mut out = Raster::filled(w, h, Label::Background);
    for y in 0..h {
        for x in 0..w {
            let mut fg = 0usize;
            let mut total = 0usize;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    total += 1;
                    if mask.get(nx as usize, ny as usize) == Label::Foreground {
                        fg += 1;
                    }
                }
            }
            if 2 * fg > total {
                out.set(x, y, Label::Foreground);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raster_roundtrip_get_set() {
        let mut r = Raster::filled(3, 2, 0u8);
        r.set(2, 1, 7);
        assert_eq!(r.get(2, 1), 7);
        assert_eq!(r.get(0, 0), 0);
        assert_eq!(r.len(), 6);
    }

    #[test]
    fn median_removes_isolated_pixel() {
        let mut m = Raster::filled(5, 5, Label::Background);
        m.set(2, 2, Label::Foreground);
        let f = median3x3(&m);
        assert_eq!(f.count(Label::Foreground), 0);
    }

    #[test]
    fn median_keeps_solid_block_interior() {
        let mut m = Raster::filled(5, 5, Label::Background);
        for y in 1..4 {
            for x in 1..4 {
                m.set(x, y, Label::Foreground);
            }
        }
        let f = median3x3(&m);
        assert_eq!(f.get(2, 2), Label::Foreground);
        // Block corners have 4 of 9 foreground neighbors: not a majority.
        assert_eq!(f.get(0, 0), Label::Background);
    }
}
