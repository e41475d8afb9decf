export type Debounced<A extends unknown[]> = {
    (...args: A): void;
    cancel: () => void;
};

// Trailing-edge debounce: the wrapped function runs once, with the most
// recent arguments, after the calls stop for `waitMs`.
export function debounce<A extends unknown[]>(fn: (...args: A) => void, waitMs = 300): Debounced<A> {
    let timer: ReturnType<typeof setTimeout> | undefined;
    const debounced = (...args: A) => {
        clearTimeout(timer);
        timer = setTimeout(() => fn(...args), waitMs);
    };
    debounced.cancel = () => clearTimeout(timer);
    return debounced;
}

export function clamp01(x: number): number {
    if (Number.isNaN(x)) {
        return 0;
    }
    return Math.min(1, Math.max(0, x));
}
