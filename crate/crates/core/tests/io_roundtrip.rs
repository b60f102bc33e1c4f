use std::io::Cursor;

use gentomo::geometry::FamilyTag;
use gentomo::grid::{make_grid, ScalarField};
use gentomo::io::{read_gtm, save_field, load, write_field, write_tomogram, GtmFile};
use gentomo::tomogram::TomogramFamily;
use proptest::prelude::*;

fn axes(max_dim: usize) -> impl Strategy<Value = Vec<(f64, f64, usize)>> {
    prop::collection::vec((-50.0f64..50.0, 0.1f64..20.0, 2usize..7), 1..=max_dim)
        .prop_map(|v| v.into_iter().map(|(lo, w, n)| (lo, lo + w, n)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fields_round_trip_bit_exactly(ax in axes(3), seed in any::<u64>()) {
        let grid = make_grid(ax.len(), &ax).unwrap();
        let mut s = seed;
        let values: Vec<f64> = (0..grid.len())
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                f64::from_bits((s >> 2) | 0x3ff0_0000_0000_0000) - 1.5
            })
            .collect();
        let field = ScalarField::new(grid, values).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &field).unwrap();
        prop_assert_eq!(read_gtm(&mut Cursor::new(&buf)).unwrap(), GtmFile::Field(field));
    }

    #[test]
    fn tomograms_round_trip(ax in axes(2), nx in 2usize..30, tag in 0u16..6) {
        let params = make_grid(ax.len(), &ax).unwrap();
        let x = make_grid(1, &[(-3.0, 7.0, nx)]).unwrap();
        let values: Vec<f64> = (0..params.len() * nx).map(|k| (k as f64).sin()).collect();
        let t = TomogramFamily::new(x, params, values, FamilyTag::from_u16(tag).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_tomogram(&mut buf, &t).unwrap();
        prop_assert_eq!(read_gtm(&mut Cursor::new(&buf)).unwrap(), GtmFile::Tomogram(t));
    }

    #[test]
    fn truncated_files_are_rejected(ax in axes(2), cut in 1usize..200) {
        let grid = make_grid(ax.len(), &ax).unwrap();
        let field = ScalarField::zeros(grid);
        let mut buf = Vec::new();
        write_field(&mut buf, &field).unwrap();
        let cut = cut.min(buf.len());
        buf.truncate(buf.len() - cut);
        prop_assert!(read_gtm(&mut Cursor::new(&buf)).is_err());
    }
}

#[test]
fn files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.gtm");
    let grid = make_grid(2, &[(-1.0, 1.0, 3), (0.0, 2.0, 4)]).unwrap();
    let field = ScalarField::from_fn(grid, |q| q[0] + 10.0 * q[1]).unwrap();
    save_field(&path, &field).unwrap();
    assert_eq!(load(&path).unwrap(), GtmFile::Field(field));
    assert!(load(&dir.path().join("missing.gtm")).is_err());
}
