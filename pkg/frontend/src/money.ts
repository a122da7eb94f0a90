/** Display helpers for the API's decimal-dollar strings. No arithmetic happens
 * client-side: every figure shown comes verbatim from an API response. */

/** "113400.00" -> "$113,400.00"; "-20.50" -> "-$20.50" */
export function formatMoney(wire: string): string {
  const match = /^(-?)(\d+)\.(\d{2})$/.exec(wire);
  if (!match) {
    throw new Error(`not a wire money value: ${wire}`);
  }
  const [, sign, whole, cents] = match;
  const grouped = whole.replace(/\B(?=(\d{3})+(?!\d))/g, ',');
  return `${sign}$${grouped}.${cents}`;
}

/** Form input ("120000", "120,000.5", "$1,234.56") -> wire string, or null if invalid. */
export function parseMoneyInput(raw: string): string | null {
  const cleaned = raw.trim().replace(/[$,\s]/g, '');
  if (!/^-?\d+(\.\d{1,2})?$/.test(cleaned)) {
    return null;
  }
  const negative = cleaned.startsWith('-');
  const digits = negative ? cleaned.slice(1) : cleaned;
  const [whole, frac = ''] = digits.split('.');
  const cents = (frac + '00').slice(0, 2);
  const normalizedWhole = whole.replace(/^0+(?=\d)/, '');
  return `${negative ? '-' : ''}${normalizedWhole}.${cents}`;
}

/** Wire money -> number of cents (safe within Number range; display math only). */
export function toCents(wire: string): number {
  const parsed = parseMoneyInput(wire);
  if (parsed === null) {
    throw new Error(`not a money value: ${wire}`);
  }
  const negative = parsed.startsWith('-');
  const [whole, cents] = (negative ? parsed.slice(1) : parsed).split('.');
  const value = Number(whole) * 100 + Number(cents);
  return negative ? -value : value;
}

/** Percentage display for threshold fractions: "0.90" -> "90%". */
export function formatThreshold(fraction: string): string {
  return `${Math.round(Number(fraction) * 100)}%`;
}
