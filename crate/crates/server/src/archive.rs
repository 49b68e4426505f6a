use chrono::{DateTime, Utc};

/// Uncompressed tar of `entries` in the given order. Headers carry only the
/// path, size, mode 0644 and `mtime`, so equal input gives equal bytes.
pub fn tar_snapshot<'a>(entries: impl IntoIterator<Item = (&'a str, &'a [u8])>, mtime: DateTime<Utc>) -> std::io::Result<Vec<u8>> {
    let mut builder = tar::Builder::new(Vec::new());
    builder.mode(tar::HeaderMode::Deterministic);
    for (path, bytes) in entries {
        let mut header = tar::Header::new_gnu();
        header.set_entry_type(tar::EntryType::Regular);
        header.set_size(bytes.len() as u64);
        header.set_mode(0o644);
        header.set_uid(0);
        header.set_gid(0);
        header.set_mtime(mtime.timestamp().max(0) as u64);
        builder.append_data(&mut header, path, bytes)?;
    }
    builder.into_inner()
}
