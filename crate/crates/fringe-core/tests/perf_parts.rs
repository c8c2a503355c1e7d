use fringe_core::rootmusic::{estimate_pixel, music_polynomials};
use fringe_core::smallmat::{companion_roots, svd, CMatrix};
use num_complex::Complex64;
use std::time::Instant;

fn window(m: usize) -> CMatrix {
    let l = (m - 1) as isize / 2;
    let mut win = CMatrix::zeros(m, m);
    for r in 0..m {
        for c in 0..m {
            let x = (c as isize - l) as f64;
            let y = (r as isize - l) as f64;
            let noise = Complex64::new(
                0.3 * (((r * 31 + c * 17) % 13) as f64 / 13.0 - 0.5),
                0.3 * (((r * 7 + c * 29) % 11) as f64 / 11.0 - 0.5),
            );
            win[(r, c)] = Complex64::from_polar(1.0, 0.1 + 0.4 * x - 0.7 * y) + noise;
        }
    }
    win
}

#[test]
#[ignore]
fn probe() {
    for m in [11usize, 17] {
        let win = window(m);
        let reps = 2000;

        let t = Instant::now();
        for _ in 0..reps {
            let f = svd(&win).unwrap();
            std::hint::black_box(&f.s);
        }
        let t_svd = t.elapsed().as_secs_f64() / reps as f64 * 1e6;

        let t = Instant::now();
        for _ in 0..reps {
            let p = music_polynomials(&win).unwrap();
            std::hint::black_box(&p);
        }
        let t_poly = t.elapsed().as_secs_f64() / reps as f64 * 1e6;

        let (py, px) = music_polynomials(&win).unwrap();
        let t = Instant::now();
        for _ in 0..reps {
            let r = companion_roots(&py).unwrap();
            std::hint::black_box(&r);
            let r = companion_roots(&px).unwrap();
            std::hint::black_box(&r);
        }
        let t_roots = t.elapsed().as_secs_f64() / reps as f64 * 1e6;

        let t = Instant::now();
        for _ in 0..reps {
            let e = estimate_pixel(&win, 1e-6).unwrap();
            std::hint::black_box(&e);
        }
        let t_pix = t.elapsed().as_secs_f64() / reps as f64 * 1e6;

        println!(
            "M={m}: svd {t_svd:.1} us | music_polys {t_poly:.1} us | 2x companion_roots {t_roots:.1} us | estimate_pixel {t_pix:.1} us"
        );
    }
}
