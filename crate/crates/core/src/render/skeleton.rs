//! Thinning of line images to unit width.

use super::image::LineImage;

/// Neighbors clockwise from north: P2..P9 in Zhang-Suen notation.
const RING: [(isize, isize); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

fn ring(img: &LineImage, x: usize, y: usize) -> [bool; 8] {
    RING.map(|(dx, dy)| img.get_signed(x as isize + dx, y as isize + dy))
}

fn zhang_suen_pass(img: &mut LineImage, second: bool) -> bool {
    let mut remove = Vec::new();
    for (x, y) in img.ink_pixels() {
        let p = ring(img, x, y);
        let b = p.iter().filter(|&&v| v).count();
        if !(2..=6).contains(&b) {
            continue;
        }
        let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
        if a != 1 {
            continue;
        }
        // p[0]=N, p[2]=E, p[4]=S, p[6]=W
        let (c1, c2) = if second {
            (p[0] && p[2] && p[6], p[0] && p[4] && p[6])
        } else {
            (p[0] && p[2] && p[4], p[2] && p[4] && p[6])
        };
        if !c1 && !c2 {
            remove.push((x, y));
        }
    }
    // Parallel deletion can erase a whole tiny component in one pass; keep
    // a candidate whose ink neighbors are all candidates that come later in
    // scan order.
    let marked: std::collections::HashSet<(usize, usize)> = remove.iter().copied().collect();
    let keep: Vec<bool> = remove
        .iter()
        .map(|&(x, y)| {
            RING.iter().all(|&(dx, dy)| {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                !img.get_signed(nx, ny)
                    || (marked.contains(&(nx as usize, ny as usize))
                        && (ny as usize, nx as usize) > (y, x))
            })
        })
        .collect();
    let mut removed = false;
    for (&(x, y), k) in remove.iter().zip(keep) {
        if !k {
            img.set(x, y, false);
            removed = true;
        }
    }
    removed
}

/// Yokoi connectivity number for 8-connectivity; 1 means the pixel is simple.
fn connectivity8(p: &[bool; 8]) -> usize {
    // Yokoi's formula uses east-first order; rotate from north-first.
    let q = |k: usize| !p[(k + 2) % 8];
    (0..4)
        .map(|i| {
            let k = 2 * i;
            (q(k) as usize) - (q(k) && q(k + 1) && q(k + 2)) as usize
        })
        .sum()
}

/// Removes one pixel from each fully set 2×2 block, preferring simple ones.
fn break_blocks(img: &mut LineImage) -> bool {
    let mut changed = false;
    for y in 0..img.height.saturating_sub(1) {
        for x in 0..img.width.saturating_sub(1) {
            let cells = [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)];
            if !cells.iter().all(|&(cx, cy)| img.get(cx, cy)) {
                continue;
            }
            let simple = cells
                .iter()
                .copied()
                .find(|&(cx, cy)| connectivity8(&ring(img, cx, cy)) == 1);
            let target = simple.unwrap_or_else(|| {
                *cells
                    .iter()
                    .max_by_key(|&&(cx, cy)| ring(img, cx, cy).iter().filter(|&&v| v).count())
                    .unwrap()
            });
            img.set(target.0, target.1, false);
            changed = true;
        }
    }
    changed
}

/// Zhang-Suen thinning to convergence followed by removal of leftover 2×2
/// blocks, repeated until stable. Never adds ink and is idempotent.
pub fn skeletonize(img: &LineImage) -> LineImage {
    let mut out = img.clone();
    loop {
        let mut changed = false;
        loop {
            let a = zhang_suen_pass(&mut out, false);
            let b = zhang_suen_pass(&mut out, true);
            if !a && !b {
                break;
            }
            changed = true;
        }
        if break_blocks(&mut out) {
            changed = true;
        }
        if !changed {
            break;
        }
    }
    out
}

/// Reference Zhang-Suen written independently (full-image scans, explicit
/// neighbor names). Used only by tests.
#[cfg(test)]
pub(crate) fn reference_zhang_suen(img: &LineImage) -> LineImage {
    let (w, h) = (img.width as isize, img.height as isize);
    let mut g: Vec<Vec<u8>> = (0..h)
        .map(|y| (0..w).map(|x| img.get_signed(x, y) as u8).collect())
        .collect();
    let at = |g: &Vec<Vec<u8>>, x: isize, y: isize| -> u8 {
        if x < 0 || y < 0 || x >= w || y >= h {
            0
        } else {
            g[y as usize][x as usize]
        }
    };
    loop {
        let mut any = false;
        for step in 0..2 {
            let mut marks = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if at(&g, x, y) == 0 {
                        continue;
                    }
                    let p2 = at(&g, x, y - 1);
                    let p3 = at(&g, x + 1, y - 1);
                    let p4 = at(&g, x + 1, y);
                    let p5 = at(&g, x + 1, y + 1);
                    let p6 = at(&g, x, y + 1);
                    let p7 = at(&g, x - 1, y + 1);
                    let p8 = at(&g, x - 1, y);
                    let p9 = at(&g, x - 1, y - 1);
                    let seq = [p2, p3, p4, p5, p6, p7, p8, p9, p2];
                    let b: u8 = seq[..8].iter().sum();
                    let a = seq.windows(2).filter(|w| w[0] == 0 && w[1] == 1).count();
                    let ok = if step == 0 {
                        p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0
                    } else {
                        p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0
                    };
                    if (2..=6).contains(&b) && a == 1 && ok {
                        marks.push((x, y));
                    }
                }
            }
            for (x, y) in &marks {
                g[*y as usize][*x as usize] = 0;
            }
            any |= !marks.is_empty();
        }
        if !any {
            break;
        }
    }
    let mut out = LineImage::blank(img.width, img.height);
    for y in 0..img.height {
        for x in 0..img.width {
            out.set(x, y, g[y][x] == 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bar(w: usize, h: usize, x0: usize, y0: usize, len: usize, thick: usize) -> LineImage {
        let mut img = LineImage::blank(w, h);
        for y in y0..y0 + thick {
            for x in x0..x0 + len {
                img.set(x, y, true);
            }
        }
        img
    }

    #[test]
    fn thick_bar_becomes_one_pixel_line() {
        let img = bar(60, 20, 10, 8, 40, 5);
        let s = skeletonize(&img);
        assert!(!s.has_thick_block());
        let b = s.ink_bounds().unwrap();
        assert_eq!(b.height(), 1);
        // Thinning recedes each end by about half the stroke thickness.
        assert_eq!(s.pixels, reference_zhang_suen(&img).pixels);
        assert!((b.width() as isize - 40).abs() <= 5, "width {}", b.width());
        assert_eq!(s.connected_components().len(), 1);
    }

    #[test]
    fn thin_line_is_unchanged() {
        let img = bar(30, 10, 3, 4, 20, 1);
        assert_eq!(skeletonize(&img).pixels, img.pixels);
    }

    #[test]
    fn disk_skeleton_matches_reference() {
        let mut img = LineImage::blank(32, 32);
        for y in 0..32 {
            for x in 0..32 {
                let (dx, dy) = (x as f64 - 15.0, y as f64 - 15.0);
                if dx * dx + dy * dy <= 100.0 {
                    img.set(x, y, true);
                }
            }
        }
        let s = skeletonize(&img);
        let r = reference_zhang_suen(&img);
        assert_eq!(s.connected_components().len(), 1);
        assert!(!s.has_thick_block());
        // Block cleanup only ever removes pixels from the reference result.
        let extra = s.ink_pixels().filter(|&(x, y)| !r.get(x, y)).count();
        assert_eq!(extra, 0);
        assert!(r.ink_count() - s.ink_count() <= 4);
        // Spurs: the skeleton of a disk is compact.
        let b = s.ink_bounds().unwrap();
        assert!(b.width() <= 9 && b.height() <= 9, "{b:?}");
    }

    #[test]
    fn small_blocks_survive() {
        let mut img = LineImage::blank(8, 8);
        for (x, y) in [(2, 2), (3, 2), (2, 3), (3, 3)] {
            img.set(x, y, true);
        }
        let s = skeletonize(&img);
        assert_eq!(s.ink_count(), 1);

        let mut disk = LineImage::blank(32, 32);
        for y in 0..32 {
            for x in 0..32 {
                let (dx, dy) = (x as f64 - 15.5, y as f64 - 15.5);
                if dx * dx + dy * dy <= 100.0 {
                    disk.set(x, y, true);
                }
            }
        }
        assert_eq!(skeletonize(&disk).connected_components().len(), 1);
    }

    #[test]
    fn yokoi_number() {
        // Isolated pixel with one neighbor: an end point, simple.
        let mut p = [false; 8];
        p[2] = true;
        assert_eq!(connectivity8(&p), 1);
        // A bridge between N and S is not simple.
        let mut p = [false; 8];
        p[0] = true;
        p[4] = true;
        assert_eq!(connectivity8(&p), 2);
    }

    fn arb_image() -> impl Strategy<Value = LineImage> {
        proptest::collection::vec(any::<bool>(), 24 * 24).prop_map(|bits| {
            let mut img = LineImage::blank(24, 24);
            for (i, b) in bits.into_iter().enumerate() {
                img.pixels[i] = b as u8;
            }
            img
        })
    }

    proptest! {
        #[test]
        fn thinning_invariants(img in arb_image()) {
            let s = skeletonize(&img);
            prop_assert!(!s.has_thick_block());
            prop_assert!(s.ink_pixels().all(|(x, y)| img.get(x, y)));
            prop_assert_eq!(skeletonize(&s).pixels, s.pixels.clone());
            let d = img.dilated();
            prop_assert!(s.ink_pixels().all(|(x, y)| d.get(x, y)));
        }
    }
}
