#![no_main]

use ctrldet::controller::Grid;
use libfuzzer_sys::fuzz_target;

// Layout: dimension count, one byte-pair count per dimension, then an
// eight-byte little-endian index.
fuzz_target!(|data: &[u8]| {
    let Some((&dims, rest)) = data.split_first() else {
        return;
    };
    let dims = usize::from(dims % 4) + 1;
    if rest.len() < 2 * dims + 8 {
        return;
    }
    let (counts, rest) = rest.split_at(2 * dims);
    let counts: Vec<u32> = counts.chunks(2).map(|c| u32::from(u16::from_le_bytes([c[0], c[1]]))).collect();
    let index = u64::from_le_bytes(rest[..8].try_into().unwrap());
    let Ok(grid) = Grid::integer(&counts) else {
        return;
    };
    if let Ok(cell) = grid.unindex_fs(index) {
        assert_eq!(grid.index_fs(&cell).unwrap(), index);
        assert_eq!(grid.fs_to_fb(index).unwrap(), grid.index_fb(&cell).unwrap());
    }
    if let Ok(cell) = grid.unindex_fb(index) {
        assert_eq!(grid.index_fb(&cell).unwrap(), index);
    }
});
