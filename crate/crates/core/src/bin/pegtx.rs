use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    // Deeply nested inputs recurse deeply; give the parse a roomy stack.
    let status = std::thread::Builder::new()
        .stack_size(512 << 20)
        .spawn(|| {
            let stdout = io::stdout();
            let stderr = io::stderr();
            pegtx::cli::run(
                std::env::args_os(),
                &mut io::stdin().lock(),
                &mut stdout.lock(),
                &mut stderr.lock(),
            )
        })
        .expect("spawn main thread")
        .join()
        .unwrap_or(101);
    ExitCode::from(status as u8)
}
