//! `blk*.dat` record framing: `[magic][u32 LE length][block]`, repeated.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{encode::MAX_DECLARED_SIZE, Block, DecodeError};

/// Regtest-style network magic of the source chain.
pub const SOURCE_MAGIC: [u8; 4] = [0xfa, 0xbf, 0xb5, 0xda];

/// Largest record length accepted by the reader.
pub const MAX_BLOCK_RECORD: u32 = MAX_DECLARED_SIZE as u32;

/// Files roll over once they pass this size.
const MAX_FILE_SIZE: u64 = 128 << 20;

#[derive(Debug, Error)]
pub enum BlockFileError {
    #[error("bad magic {found:02x?} at offset {offset}")]
    BadMagic { offset: u64, found: [u8; 4] },
    #[error("block record at offset {offset} is truncated")]
    TruncatedBlock { offset: u64 },
    #[error("block record at offset {offset} declares {len} bytes")]
    OversizeDeclaredLength { offset: u64, len: u32 },
    #[error("block at offset {offset} does not decode: {source}")]
    Decode { offset: u64, source: DecodeError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Streams blocks out of a record-framed reader. Memory use is bounded by
/// the largest single block.
pub struct BlockFileReader<R> {
    inner: R,
    magic: [u8; 4],
    offset: u64,
    done: bool,
}

impl BlockFileReader<BufReader<File>> {
    pub fn open(path: &Path, magic: [u8; 4]) -> io::Result<Self> {
        Ok(Self::new(BufReader::new(File::open(path)?), magic))
    }
}

impl<R: Read> BlockFileReader<R> {
    pub fn new(inner: R, magic: [u8; 4]) -> Self {
        BlockFileReader { inner, magic, offset: 0, done: false }
    }

    /// Byte offset of the next record.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    fn fill(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let mut read = 0;
        while read < buf.len() {
            match self.inner.read(&mut buf[read..]) {
                Ok(0) => break,
                Ok(n) => read += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        Ok(read)
    }

    fn next_block(&mut self) -> Result<Option<Block>, BlockFileError> {
        let start = self.offset;
        let mut head = [0u8; 8];
        let got = self.fill(&mut head)?;
        if got == 0 {
            return Ok(None);
        }
        let magic: [u8; 4] = head[..4].try_into().unwrap();
        // bitcoind preallocates block files with zeros
        if got >= 4 && magic == [0; 4] {
            return Ok(None);
        }
        if got < 8 {
            return Err(BlockFileError::TruncatedBlock { offset: start });
        }
        if magic != self.magic {
            return Err(BlockFileError::BadMagic { offset: start, found: magic });
        }
        let len = u32::from_le_bytes(head[4..].try_into().unwrap());
        if len > MAX_BLOCK_RECORD {
            return Err(BlockFileError::OversizeDeclaredLength { offset: start, len });
        }
        let mut body = vec![0u8; len as usize];
        if self.fill(&mut body)? < body.len() {
            return Err(BlockFileError::TruncatedBlock { offset: start });
        }
        self.offset += 8 + len as u64;
        Block::deserialize(&body)
            .map(Some)
            .map_err(|source| BlockFileError::Decode { offset: start, source })
    }
}

impl<R: Read> Iterator for BlockFileReader<R> {
    type Item = Result<Block, BlockFileError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.next_block().transpose();
        if !matches!(item, Some(Ok(_))) {
            self.done = true;
        }
        item
    }
}

/// Parses a whole in-memory block file.
pub fn parse_block_file(bytes: &[u8], magic: [u8; 4]) -> Result<Vec<Block>, BlockFileError> {
    BlockFileReader::new(bytes, magic).collect()
}

pub fn write_block_record<W: Write>(out: &mut W, magic: [u8; 4], block: &Block) -> io::Result<u64> {
    let body = block.serialize();
    out.write_all(&magic)?;
    out.write_all(&(body.len() as u32).to_le_bytes())?;
    out.write_all(&body)?;
    Ok(8 + body.len() as u64)
}

/// `blk*.dat` files in `dir`, in name order.
pub fn list_block_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("blk") && n.ends_with(".dat"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Appends records to `blk00000.dat`, `blk00001.dat`, ... in a directory.
pub struct BlockFileWriter {
    dir: PathBuf,
    magic: [u8; 4],
    file_index: u32,
    written: u64,
    out: BufWriter<File>,
    files: Vec<PathBuf>,
}

impl BlockFileWriter {
    pub fn create(dir: &Path, magic: [u8; 4]) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join("blk00000.dat");
        let out = BufWriter::new(OpenOptions::new().create(true).write(true).truncate(true).open(&path)?);
        Ok(BlockFileWriter { dir: dir.to_path_buf(), magic, file_index: 0, written: 0, out, files: vec![path] })
    }

    pub fn append(&mut self, block: &Block) -> io::Result<()> {
        if self.written >= MAX_FILE_SIZE {
            self.out.flush()?;
            self.file_index += 1;
            let path = self.dir.join(format!("blk{:05}.dat", self.file_index));
            self.out = BufWriter::new(File::create(&path)?);
            self.files.push(path);
            self.written = 0;
        }
        self.written += write_block_record(&mut self.out, self.magic, block)?;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<Vec<PathBuf>> {
        self.out.flush()?;
        self.out.get_ref().sync_all()?;
        Ok(self.files)
    }
}
